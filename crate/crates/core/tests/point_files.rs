use fqdist::pairs::pair_spectrum_fast;
use fqdist::{Error, PointSetFile, PrimeField, SplitPointSet};

const SAMPLE: &str = "\
# two points in F_7^4
q=7 dims=4 split=2,2
0,1,2,3   # trailing comment
6,6,0,0
";

#[test]
fn parse_sample() {
    let file = PointSetFile::parse(SAMPLE).unwrap();
    assert_eq!((file.q, file.dims, file.split), (7, 4, Some((2, 2))));
    assert_eq!(file.points, vec![vec![0, 1, 2, 3], vec![6, 6, 0, 0]]);
    let set = SplitPointSet::from_file(&file).unwrap();
    assert_eq!(set.len(), 2);
    assert!(set.contains(&[6, 6, 0, 0]));
}

#[test]
fn render_round_trip_preserves_the_spectrum() {
    let fld = PrimeField::new(5).unwrap();
    let set = SplitPointSet::new(&fld, 2, 3, (0..40u64).map(|i| vec![i % 5, i / 5 % 5, i * 3 % 5, 1, i % 2])).unwrap();
    let text = set.to_file().render();
    let back = SplitPointSet::from_file(&PointSetFile::parse(&text).unwrap()).unwrap();
    assert_eq!(back, set);
    assert_eq!(pair_spectrum_fast(&set, &set).unwrap(), pair_spectrum_fast(&back, &back).unwrap());
}

#[test]
fn malformed_files() {
    let cases = [
        ("", 0),
        ("q=7 dims=2\n1,2,3\n", 2),
        ("q=7 dims=2\n1,7\n", 2),
        ("q=7 dims=2\n1,x\n", 2),
    ];
    for (text, line) in cases {
        match PointSetFile::parse(text) {
            Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
            other => panic!("{text:?} parsed as {other:?}"),
        }
    }
    assert!(PointSetFile::parse("q=7 dims=4 split=2,1\n").is_err());
    let no_split = PointSetFile::parse("q=7 dims=2\n0,0\n").unwrap();
    assert!(SplitPointSet::from_file(&no_split).is_err());
}
