fn main() {
    std::process::exit(pleb_cli::app::run(std::env::args_os()));
}
