fn main() -> std::process::ExitCode {
    lazycore::cli::main()
}
