fn main() {
    std::process::exit(phishcorr::cli::run(std::env::args_os()));
}
