fn main() {
    eprintln!("hbs: not yet wired");
    std::process::exit(3);
}
