fn main() -> std::process::ExitCode {
    kansa::cli::main_entry()
}
