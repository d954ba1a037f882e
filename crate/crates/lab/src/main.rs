fn main() {
    std::process::exit(rmsmd_lab::cli::run(std::env::args_os()));
}
