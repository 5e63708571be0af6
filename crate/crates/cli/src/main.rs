fn main() -> std::process::ExitCode {
    camnet_cli::run()
}
