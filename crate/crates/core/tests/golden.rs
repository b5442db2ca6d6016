//! Flow right-hand sides pinned as JSON. Set `UPDATE_GOLDEN=1` to rewrite.

use std::path::PathBuf;

use mkdv_core::hierarchy::FlowSpec;
use mkdv_core::{AlgebraCtx, Hierarchy};

fn path(n: u32) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/flow_r1_n{n}.json"))
}

#[test]
fn rank_one_flows_match_golden_files() {
    let hier = Hierarchy::new(AlgebraCtx::new(1).unwrap());
    for n in [1u32, 3, 5] {
        let flow = hier.flow(n, n as i32 + 2).unwrap();
        let json = serde_json::to_string_pretty(&flow.to_json_value()).unwrap() + "\n";
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(path(n), &json).unwrap();
            continue;
        }
        let stored = std::fs::read_to_string(path(n)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&stored).unwrap();
        let (rank, m, rhs) = FlowSpec::rhs_from_json(&value).unwrap();
        assert_eq!((rank, m), (1, n));
        assert_eq!(rhs, flow.rhs, "flow {n} differs from its golden file");
    }
}
