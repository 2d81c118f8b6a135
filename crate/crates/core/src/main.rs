fn main() -> std::process::ExitCode {
    hypertorus::cli::main()
}
