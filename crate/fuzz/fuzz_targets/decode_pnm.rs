#![no_main]

use libfuzzer_sys::fuzz_target;
use lowlight::pnm;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = pnm::decode(data) {
        assert_eq!(r.samples.len(), r.width * r.height * r.channels);
        let again = pnm::decode(&pnm::encode(r.width, r.height, r.channels, &r.samples)).unwrap();
        assert_eq!(again.samples, r.samples);
    }
});
