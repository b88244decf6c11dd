fn main() {
    std::process::exit(spde_blowup::cli::run(std::env::args_os()));
}
