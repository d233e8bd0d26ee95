fn main() {
    std::process::exit(smform::cli::main_entry());
}
