fn main() {
    std::process::exit(orlicz_homog::harness::cli_main(std::env::args_os()));
}
