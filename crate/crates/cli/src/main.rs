fn main() {
    std::process::exit(latorbit::main_with_args(std::env::args_os()));
}
