fn main() {
    std::process::exit(gdsaddle::shell::dispatch(std::env::args_os()));
}
