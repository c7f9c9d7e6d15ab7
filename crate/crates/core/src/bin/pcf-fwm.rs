fn main() {
    std::process::exit(pcf_fwm::cli::run(std::env::args_os()));
}
