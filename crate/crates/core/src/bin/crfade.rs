fn main() {
    std::process::exit(crfade::cli::main_with(std::env::args_os()));
}
