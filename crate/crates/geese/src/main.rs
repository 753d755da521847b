fn main() -> std::process::ExitCode {
    geese::cli::main()
}
