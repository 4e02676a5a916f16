fn main() -> std::process::ExitCode {
    cavloc::cli::main()
}
