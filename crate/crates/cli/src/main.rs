fn main() {
    std::process::exit(cornerflow_cli::app::main_with(std::env::args_os()));
}
