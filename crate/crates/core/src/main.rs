fn main() -> std::process::ExitCode {
    ldtl_shield::cli::main_with(std::env::args_os())
}
