fn main() {
    println!("qfp");
}
