fn main() {
    std::process::exit(cf_lab::cli::run(std::env::args_os()));
}
