fn main() -> std::process::ExitCode {
    fwheb::cli::main_entry()
}
