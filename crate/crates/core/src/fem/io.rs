//! Plain-text mesh dump:
//!
//! ```text
//! dim n_vertices n_cells
//! x [y]                       one line per vertex
//! v0 v1 [v2]                  one line per cell
//! boundary <kind> <n_free> <pinned node or -1>
//! interfaces [c ...]
//! <free index or -1>          one line per vertex
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::mesh::{BoundaryKind, Mesh};

pub fn dump_mesh(mesh: &Mesh, mut out: impl Write) -> Result<()> {
    writeln!(out, "{} {} {}", mesh.dim(), mesh.num_vertices(), mesh.num_cells())?;
    for v in mesh.vertices() {
        if mesh.dim() == 1 {
            writeln!(out, "{:.17e}", v[0])?;
        } else {
            writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
        }
    }
    for c in 0..mesh.num_cells() {
        let ids: Vec<String> = mesh.cell(c).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", ids.join(" "))?;
    }
    let pinned = mesh.pinned_node().map_or(-1, |p| p as i64);
    writeln!(out, "boundary {} {} {}", mesh.boundary().as_str(), mesh.num_free(), pinned)?;
    let ifs: Vec<String> = mesh.interfaces().iter().map(|c| format!("{c:.17e}")).collect();
    writeln!(out, "interfaces {}", ifs.join(" "))?;
    for v in 0..mesh.num_vertices() {
        writeln!(out, "{}", mesh.free_index(v).map_or(-1, |k| k as i64))?;
    }
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let perr = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
    let mut lines = file.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| perr("unexpected end of file".into()))
    };
    let header: Vec<usize> = parse_fields(&next()?).map_err(&perr)?;
    let [dim, nv, nc] = header[..] else {
        return Err(perr("header must be `dim n_vertices n_cells`".into()));
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let xs: Vec<f64> = parse_fields(&next()?).map_err(&perr)?;
        if xs.len() != dim {
            return Err(perr(format!("vertex line has {} coordinates", xs.len())));
        }
        vertices.push(crate::linalg::vector_from(&xs));
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let ids: Vec<usize> = parse_fields(&next()?).map_err(&perr)?;
        if ids.len() != dim + 1 {
            return Err(perr(format!("cell line has {} vertices", ids.len())));
        }
        let mut cell = [0usize; 3];
        cell[..=dim].copy_from_slice(&ids);
        cells.push(cell);
    }
    let boundary_line = next()?;
    let parts: Vec<&str> = boundary_line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "boundary" {
        return Err(perr(format!("bad boundary line `{boundary_line}`")));
    }
    let kind = BoundaryKind::parse(parts[1]).ok_or_else(|| perr(format!("unknown boundary `{}`", parts[1])))?;
    let n_free: usize = parts[2].parse().map_err(|_| perr("bad free count".into()))?;
    let interfaces_line = next()?;
    let interfaces: Vec<f64> = interfaces_line
        .strip_prefix("interfaces")
        .ok_or_else(|| perr("missing interfaces line".into()))
        .and_then(|rest| parse_fields(rest).map_err(&perr))?;
    let mut stored = Vec::with_capacity(nv);
    for _ in 0..nv {
        let k: i64 = next()?.trim().parse().map_err(|_| perr("bad constraint line".into()))?;
        stored.push(k);
    }

    let mesh = Mesh::assemble(dim, vertices, cells, kind, interfaces, None)?;
    let rebuilt: Vec<i64> = (0..nv).map(|v| mesh.free_index(v).map_or(-1, |k| k as i64)).collect();
    if mesh.num_free() != n_free || rebuilt != stored {
        return Err(perr("constraint map does not match the stored one".into()));
    }
    Ok(mesh)
}

fn parse_fields<T: std::str::FromStr>(line: &str) -> std::result::Result<Vec<T>, String> {
    line.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| format!("cannot parse `{t}`")))
        .collect()
}
