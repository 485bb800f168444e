fn main() -> std::process::ExitCode {
    timbre_latent::cli::main()
}
