fn main() {
    std::process::exit(ngcp_cli::run(std::env::args_os()));
}
