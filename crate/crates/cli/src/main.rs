fn main() {
    std::process::exit(livewire_cli::cli::run(std::env::args_os()));
}
