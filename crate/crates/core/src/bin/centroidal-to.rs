fn main() -> std::process::ExitCode {
    centroidal_to::cli::main()
}
