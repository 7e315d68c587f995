fn main() {
    let env = std::env::vars().collect();
    std::process::exit(fulfillkit_cli::run(std::env::args_os(), &env));
}
