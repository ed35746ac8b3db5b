fn main() {
    std::process::exit(seagrid_cli::run(std::env::args_os()));
}
