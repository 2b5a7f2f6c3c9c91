//! Effective energy f(ξ), its numeric conjugate f*, and the dual cell
//! functional h* for 1D laminates, where f* = h*.

use orlicz_homog::cell::{cell_mesh, eval_f, eval_hstar, fstar_numeric};
use orlicz_homog::msolve::SolverSettings;
use orlicz_homog::opcat::parse_operator;
use orlicz_homog::{Result, Vector};

fn main() -> Result<()> {
    let settings = SolverSettings::default();
    for name in ["linear:1,3", "plaplace:3,1,16"] {
        let op = parse_operator(name, 1)?;
        let mesh = cell_mesh(&op, 256)?;
        for s in [0.5, 1.0, 2.0] {
            let v = Vector::new(s, 0.0);
            let f = eval_f(&op, &mesh, &v, &settings)?.value;
            let fs = fstar_numeric(&op, &mesh, &v, &settings)?;
            let hs = eval_hstar(op.nfunction(), &v, &mesh, settings.quad_order)?;
            println!("{name:<16} s={s:<4} f={f:<10.6} f*={fs:<10.6} h*={hs:<10.6}");
        }
    }
    Ok(())
}
