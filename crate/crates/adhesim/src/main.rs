fn main() {
    println!("adhesim CLI placeholder");
}
