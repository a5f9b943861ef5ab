fn main() {
    std::process::exit(monodromy_lab::run(std::env::args_os()));
}
