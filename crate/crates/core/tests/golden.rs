use rsiot::primitives::{hash, recover, sign, SecretKey};

#[test]
fn golden_vectors() {
    let text = include_str!("data/golden_vectors.txt");
    let mut checked = 0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f[0] {
            "keccak" => {
                let input = if f[1] == "-" { Vec::new() } else { hex::decode(f[1]).unwrap() };
                assert_eq!(hash(&input).to_hex(), f[2], "{line}");
            }
            "address" => {
                let sk_bytes: [u8; 32] = hex::decode(f[1]).unwrap().try_into().unwrap();
                let sk = SecretKey::from_bytes(&sk_bytes).unwrap();
                assert_eq!(sk.address().to_string(), format!("0x{}", f[2]), "{line}");
                let sig = sign(&sk, b"golden");
                assert_eq!(recover(b"golden", &sig).unwrap(), sk.address());
            }
            other => panic!("unknown vector kind {other}"),
        }
        checked += 1;
    }
    assert_eq!(checked, 4);
}
