fn main() -> std::process::ExitCode {
    sublab::cli::main()
}
