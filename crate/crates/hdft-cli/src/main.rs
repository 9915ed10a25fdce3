fn main() {
    eprintln!("hdft: command line interface not wired up yet");
    std::process::exit(2);
}
