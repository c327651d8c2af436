fn main() -> std::process::ExitCode {
    fdisynth::cli::main()
}
