fn main() {
    std::process::exit(qhrom_sim::cli::run(std::env::args_os()));
}
