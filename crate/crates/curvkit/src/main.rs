fn main() {
    std::process::exit(curvkit::cli::cli_dispatch(std::env::args_os()));
}
