fn main() {
    std::process::exit(chansel::cli::dispatch(std::env::args_os()));
}
