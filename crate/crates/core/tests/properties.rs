mod common;

use common::*;
use kog::ast::{ObjId, Type, Value};
use kog::rtcheck::{canonical_env, check_config};
use kog::runtime::{apply, canonicalize, enabled, fingerprint, initial_configuration, intf, run, Policy};
use kog::typecheck::{is_subtype, TypingContext};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn ty(h: &Hierarchy, pick: u8, set: &BTreeSet<usize>) -> Type {
    match pick % 4 {
        0 => Type::Any,
        1 => Type::Bool,
        2 => Type::iface(Hierarchy::name(set.iter().next().copied().unwrap_or(0) % h.len())),
        _ => Type::group(set.iter().map(|&i| Hierarchy::name(i % h.len()))),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn intersect_is_an_upper_bound(
        h in hierarchy(6),
        picks in proptest::collection::vec((any::<u8>(), proptest::collection::btree_set(0usize..6, 0..3)), 4),
    ) {
        let table = h.table();
        let a = ty(&h, picks[0].0, &picks[0].1);
        let b = ty(&h, picks[1].0, &picks[1].1);
        // Only reference types meet in practice; Bool only meets Bool.
        prop_assume!((a == Type::Bool) == (b == Type::Bool));
        let left = TypingContext::new().with("x", a.clone());
        let right = TypingContext::new().with("x", b.clone());
        let meet = left.intersect(&table, &right);
        let r = meet.get("x").unwrap();
        prop_assert!(is_subtype(&table, &a, r), "{} not below {}", a, r);
        prop_assert!(is_subtype(&table, &b, r), "{} not below {}", b, r);
    }

    #[test]
    fn compose_is_associative(
        keys in proptest::collection::vec((0u8..4, 0u8..3, any::<bool>()), 0..12),
    ) {
        let types = [Type::Bool, Type::Any, Type::iface("I")];
        let mut ctxs = [TypingContext::new(), TypingContext::new(), TypingContext::new()];
        for (k, which, _) in &keys {
            ctxs[*which as usize].insert(format!("x{k}"), types[(*k as usize) % 3].clone());
        }
        let [a, b, c] = &ctxs;
        prop_assert_eq!(a.compose(b).compose(c), a.compose(&b.compose(c)));
        prop_assert_eq!(a.compose(&TypingContext::new()), a.clone());
    }

    #[test]
    fn intf_is_a_subset_that_covers_every_export(
        h in hierarchy(5),
        entries in proptest::collection::vec((0u32..3, 0usize..5), 0..6),
    ) {
        let table = h.table();
        let exports: BTreeSet<(Value, String)> = entries
            .iter()
            .map(|&(v, i)| (Value::Obj(ObjId(v)), Hierarchy::name(i % h.len())))
            .collect();
        let result = intf(&table, &exports);
        for (_, i) in &exports {
            let covered = result.iter().any(|j| is_subtype(&table, &Type::iface(j.clone()), &Type::iface(i.clone())));
            prop_assert!(covered, "{} not covered by {:?}", i, result);
        }
        prop_assert!(result.iter().all(|i| exports.iter().any(|(_, j)| j == i)));
    }

    #[test]
    fn every_reachable_state_checks_and_canonical_forms_are_stable(seed in any::<u64>(), name in 0usize..5) {
        let name = ["editor.kog", "registry.kog", "discovery.kog", "group_call.kog", "counter.kog"][name];
        let table = checked(name);
        let result = run(&table, Policy::Random { seed }, 10_000);
        let mut cfg = initial_configuration(&table);
        for step in &result.steps {
            cfg = apply(&table, &cfg, &step.transition).unwrap();
            prop_assert!(check_config(&table, &canonical_env(&cfg), &cfg).is_empty());
            let canon = canonicalize(&cfg);
            prop_assert_eq!(canonicalize(&canon), canon.clone());
            prop_assert_eq!(fingerprint(&canon), fingerprint(&cfg));
        }
        prop_assert!(enabled(&table, &cfg).is_empty());
    }

    #[test]
    fn same_seed_same_run(seed in any::<u64>()) {
        let table = checked("registry.kog");
        let a = run(&table, Policy::Random { seed }, 10_000);
        let b = run(&table, Policy::Random { seed }, 10_000);
        prop_assert_eq!(a.steps, b.steps);
    }
}

#[test]
fn group_type_grows_downward() {
    let table = checked("leave.kog");
    let big = Type::group(["Cache", "Store"]);
    let small = Type::group(["Store"]);
    assert!(is_subtype(&table, &big, &small));
    assert!(!is_subtype(&table, &small, &big));
    assert!(is_subtype(&table, &Type::group(["Cache"]), &small));
    assert!(is_subtype(&table, &Type::group(Vec::<String>::new()), &Type::group(Vec::<String>::new())));
}
