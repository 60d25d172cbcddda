fn main() {
    std::process::exit(fifth_decay::cli::main_with(std::env::args_os()));
}
