fn main() -> std::process::ExitCode {
    phonocav::cli::main()
}
