fn main() -> std::process::ExitCode {
    gkit::main_with(std::env::args_os())
}
