fn main() {
    std::process::exit(ion_transport::cli::run(std::env::args_os()));
}
