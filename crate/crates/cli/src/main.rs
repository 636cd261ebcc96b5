fn main() {
    std::process::exit(mtrl_cli::run_cli(std::env::args_os()));
}
