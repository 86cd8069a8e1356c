fn main() {
    peakload::cli::init_logging();
    std::process::exit(peakload::cli::main_with_args(std::env::args_os()));
}
