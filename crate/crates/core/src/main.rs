fn main() {
    std::process::exit(kinetic::cli::main());
}
