fn main() -> std::process::ExitCode {
    texsplat_cli::main_entry()
}
