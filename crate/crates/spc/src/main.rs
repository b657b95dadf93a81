fn main() {
    std::process::exit(stein_spc::cli::run(std::env::args_os()));
}
