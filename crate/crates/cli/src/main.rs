fn main() {
    std::process::exit(hankel_lab::run(std::env::args_os()));
}
