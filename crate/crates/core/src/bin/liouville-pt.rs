fn main() {
    std::process::exit(liouville_pt::cli::main_entry(std::env::args_os()));
}
