//! End-to-end tests of the `conslaw` binary and the model-file corpus.
//!
//! The `cases/` directory at the repository root is the normative encoding
//! of the built-in registry: the first tests pin file-by-file agreement with
//! the in-code construction, the rest drive the binary and its exit-code
//! contract (0 pass, 1 verification failure, 2 input error).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use conslaw_cli::modelfile;
use conslaw_core::{
    case, equal, verify_conservation_law, ConservedVector, DifferentialSystem, CASE_IDS,
    DEFAULT_CLOSURE_ORDER,
};

fn cases_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases")
}

fn case_file(id: &str) -> PathBuf {
    cases_dir().join(format!("case{}.toml", id.replace('.', "_")))
}

fn conslaw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conslaw"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Fresh scratch path; the tests clean up after themselves.
fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("conslaw-cli-{}-{name}", std::process::id()))
}

fn assert_same_law(a: &ConservedVector, b: &ConservedVector, what: &str) {
    assert!(equal(&a.density, &b.density).unwrap(), "{what}: densities differ");
    assert!(equal(&a.flux, &b.flux).unwrap(), "{what}: fluxes differ");
}

fn assert_same_system(a: &DifferentialSystem, b: &DifferentialSystem, what: &str) {
    let (am, bm) = (a.model(), b.model());
    assert!(equal(&am.diffusion_value(), &bm.diffusion_value()).unwrap(), "{what}: d differs");
    assert!(equal(&am.convection_value(), &bm.convection_value()).unwrap(), "{what}: k differs");
    assert!(equal(&am.dint_value(), &bm.dint_value()).unwrap(), "{what}: Dint differs");
    assert!(equal(&am.kint_value(), &bm.kint_value()).unwrap(), "{what}: Kint differs");
    let params = |m: &conslaw_core::PDEModel| -> Vec<String> {
        m.ctx().params().map(str::to_string).collect()
    };
    assert_eq!(params(am), params(bm), "{what}: parameters differ");
    for bf in bm.ctx().funcs() {
        let af = am.ctx().func(&bf.name).unwrap_or_else(|| panic!("{what}: missing {}", bf.name));
        assert_eq!(af.args, bf.args, "{what}: arguments of {} differ", bf.name);
        assert_eq!(af.relations.len(), bf.relations.len(), "{what}: relations of {}", bf.name);
        for (ar, br) in af.relations.iter().zip(&bf.relations) {
            assert!(equal(ar, br).unwrap(), "{what}: relation of {} differs", bf.name);
        }
    }
    assert_eq!(a.levels().len(), b.levels().len(), "{what}: level counts differ");
    for (al, bl) in a.levels().iter().zip(b.levels()) {
        assert_eq!(al.dep, bl.dep, "{what}: level variable differs");
        assert!(equal(&al.x_rhs, &bl.x_rhs).unwrap(), "{what}: x-rule of {:?}", al.dep);
        match (&al.t_rhs, &bl.t_rhs) {
            (None, None) => {}
            (Some(at), Some(bt)) => {
                assert!(equal(at, bt).unwrap(), "{what}: t-rule of {:?}", al.dep)
            }
            _ => panic!("{what}: t-rule presence differs on {:?}", al.dep),
        }
    }
}

// ---------------------------------------------------------------------------
// Corpus fidelity

#[test]
fn corpus_files_match_the_registry_case_by_case() {
    for id in CASE_IDS {
        let tc = case(id).unwrap();
        let loaded = modelfile::load_path(&case_file(id)).unwrap();
        assert_same_law(&loaded.law, &tc.law, id);
        assert_same_system(&loaded.system, &tc.system, id);
    }
}

#[test]
fn reemitting_a_loaded_file_preserves_its_semantics() {
    for id in CASE_IDS {
        let l1 = modelfile::load_path(&case_file(id)).unwrap();
        let l2 = modelfile::load_str(&modelfile::emit(&l1.system, &l1.law)).unwrap();
        assert_same_law(&l2.law, &l1.law, id);
        assert_same_system(&l2.system, &l1.system, id);
        let rep =
            verify_conservation_law(&l2.system, &l2.law, DEFAULT_CLOSURE_ORDER).unwrap();
        assert!(rep.holds, "{id}: reloaded law broke, residual {}", rep.residual);
    }
}

// ---------------------------------------------------------------------------
// verify

#[test]
fn verify_passes_on_every_corpus_file() {
    for id in CASE_IDS {
        let file = case_file(id);
        let out = conslaw(&["verify", file.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "case {id}: {}{}", stdout(&out), stderr(&out));
        assert!(stdout(&out).contains("PASS"), "case {id}: {}", stdout(&out));
    }
}

#[test]
fn verify_fails_on_a_corrupted_flux_and_prints_the_residual() {
    let src = std::fs::read_to_string(case_file("1")).unwrap();
    let bad = src.replace("G = \"-d*u_x - Kint\"", "G = \"-d*u_x - Kint + u\"");
    assert_ne!(src, bad, "corruption must hit");
    let path = scratch("corrupt.toml");
    std::fs::write(&path, bad).unwrap();

    let out = conslaw(&["verify", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("FAIL") && text.contains("residual"), "{text}");

    std::fs::remove_file(path).unwrap();
}

#[test]
fn unusable_input_exits_with_code_two() {
    let garbage = scratch("garbage.toml");
    std::fs::write(&garbage, "this is [ not toml").unwrap();
    assert_eq!(code(&conslaw(&["verify", garbage.to_str().unwrap()])), 2);
    std::fs::remove_file(&garbage).unwrap();

    let unknown_key = scratch("unknown-key.toml");
    std::fs::write(&unknown_key, "[conserved]\nF = \"u\"\nG = \"0\"\nH = \"x\"\n").unwrap();
    assert_eq!(code(&conslaw(&["verify", unknown_key.to_str().unwrap()])), 2);
    std::fs::remove_file(&unknown_key).unwrap();

    assert_eq!(code(&conslaw(&["verify", "/nonexistent/nowhere.toml"])), 2);
}

// ---------------------------------------------------------------------------
// table1

#[test]
fn registry_command_verifies_every_case() {
    let out = conslaw(&["table1", "--all"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("13/13"), "{}", stdout(&out));

    let out = conslaw(&["table1", "--all", "--json", "--jobs", "4"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["cases"].as_array().unwrap();
    assert_eq!(rows.len(), CASE_IDS.len());
    for (row, id) in rows.iter().zip(CASE_IDS) {
        assert_eq!(row["case"], id);
        assert_eq!(row["holds"], true, "case {id}");
        assert_eq!(row["system_compatible"], true, "case {id}");
        assert_eq!(row["residual"], "0", "case {id}");
    }
    assert_eq!(v["pass"], true);
}

#[test]
fn registry_command_pins_the_free_constant() {
    let out = conslaw(&["table1", "--case", "3", "--eps", "-1,0,1"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.matches("PASS").count(), 3, "{text}");
    assert!(text.contains("eps = -1"), "{text}");

    // rationals are accepted verbatim
    assert_eq!(code(&conslaw(&["table1", "--case", "3.1", "--eps", "2/3"])), 0);
}

#[test]
fn registry_command_rejects_unknown_case_ids() {
    let out = conslaw(&["table1", "--case", "9"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no case"), "{}", stderr(&out));
}

// ---------------------------------------------------------------------------
// transform

#[test]
fn identity_transform_round_trips_the_file() {
    let original = modelfile::load_path(&case_file("1")).unwrap();
    let emitted = scratch("identity.toml");
    let out = conslaw(&[
        "transform",
        case_file("1").to_str().unwrap(),
        "--eps",
        "0,0,0,1,1,1,0",
        "-o",
        emitted.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));

    let reloaded = modelfile::load_path(&emitted).unwrap();
    assert_same_law(&reloaded.law, &original.law, "identity");
    assert_same_system(&reloaded.system, &original.system, "identity");
    std::fs::remove_file(emitted).unwrap();
}

#[test]
fn drift_and_involutions_still_verify_after_pushforward() {
    // a spatial drift, all three sign involutions, and a rational anisotropy
    for eps in ["0,0,0,1,1,1,1", "0,0,0,-1,1,1,0", "0,0,0,1,-1,1,0", "0,0,0,1,1,-1,0", "1,-2,3,1/2,2/3,-3,5/7"] {
        for id in ["1", "2", "3", "4"] {
            let out =
                conslaw(&["transform", case_file(id).to_str().unwrap(), "--eps", eps, "--json"]);
            assert_eq!(code(&out), 0, "case {id}, eps {eps}: {}", stderr(&out));
            let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
            assert_eq!(v["holds"], true, "case {id}, eps {eps}");
            // the emitted file must itself load and verify
            let l = modelfile::load_str(v["model_file"].as_str().unwrap()).unwrap();
            let rep = verify_conservation_law(&l.system, &l.law, DEFAULT_CLOSURE_ORDER).unwrap();
            assert!(rep.holds, "case {id}, eps {eps}: emitted file broke");
        }
    }
}

#[test]
fn degenerate_transforms_are_input_errors() {
    let file = case_file("1");
    let file = file.to_str().unwrap();
    // each scale parameter in turn zeroed out
    for eps in ["0,0,0,0,1,1,0", "0,0,0,1,0,1,0", "0,0,0,1,1,0,0"] {
        assert_eq!(code(&conslaw(&["transform", file, "--eps", eps])), 2, "eps {eps}");
    }
    assert_eq!(code(&conslaw(&["transform", file, "--eps", "1,2,3"])), 2);
    assert_eq!(code(&conslaw(&["transform", file, "--eps", "1,0,0,x,1,1,0"])), 2);
}

// ---------------------------------------------------------------------------
// determine

#[test]
fn determining_system_forces_the_first_order_structure() {
    let out = conslaw(&["determine", "--arbitrary", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["utt_coefficient"], "f10");
    assert_eq!(v["utx_coefficient"], "f01 + g10");
    let eqs: Vec<&str> =
        v["equations"].as_array().unwrap().iter().map(|e| e.as_str().unwrap()).collect();
    assert!(eqs.contains(&"f10"), "{eqs:?}");
    assert!(eqs.contains(&"f01 + g10"), "{eqs:?}");

    // the flat ansatz has strictly fewer determining equations
    let out0 = conslaw(&["determine", "--arbitrary", "--deg-ut", "0", "--deg-ux", "0", "--json"]);
    assert_eq!(code(&out0), 0);
    let v0: serde_json::Value = serde_json::from_str(&stdout(&out0)).unwrap();
    assert!(
        v0["equations"].as_array().unwrap().len() < eqs.len(),
        "degree 0 should shrink the listing"
    );
}

#[test]
fn multiplier_checks_follow_the_classifying_equation() {
    // a backward-heat symbol annihilates the heat model…
    let heat = case_file("4");
    let out = conslaw(&["determine", heat.to_str().unwrap(), "--psi", "alpha"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("= 0"), "{}", stdout(&out));

    // …as does a polynomial solution of it
    let out = conslaw(&["determine", heat.to_str().unwrap(), "--psi", "x^2 - 2*t"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    // but x is no multiplier when the convection coefficient is arbitrary
    let out = conslaw(&["determine", case_file("1").to_str().unwrap(), "--psi", "x"]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL"), "{}", stdout(&out));
}

// ---------------------------------------------------------------------------
// potential

#[test]
fn potential_command_extends_and_checks_compatibility() {
    let out = conslaw(&["potential", case_file("1").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("v_x = u"), "{text}");
    assert!(text.contains("v_xt = v_tx"), "{text}");

    // a second application introduces w on top of the v-system
    let emitted = scratch("extended.toml");
    let vsystem = case_file("1.1");
    let out = conslaw(&[
        "potential",
        vsystem.to_str().unwrap(),
        "-o",
        emitted.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("introduced potential w"), "{}", stdout(&out));

    let l = modelfile::load_path(&emitted).unwrap();
    assert_eq!(l.system.levels().len(), 2);
    std::fs::remove_file(emitted).unwrap();
}

// ---------------------------------------------------------------------------
// sample

#[test]
fn sampling_agrees_with_the_symbolic_verdicts() {
    // built-in concrete variants of a registry case
    let out = conslaw(&["sample", "--case", "1", "-n", "400", "--jobs", "2"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    // a file with a classifying symbol, bound to a concrete family member
    let out = conslaw(&[
        "sample",
        case_file("1_4").to_str().unwrap(),
        "--func",
        "sigma=exp:1",
        "--positive-u",
        "-n",
        "400",
        "--seed",
        "11",
    ]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));

    // a broken flux shows up as a fat residual
    let path = scratch("sample-corrupt.toml");
    std::fs::write(
        &path,
        "[model]\nd = \"1\"\nDint = \"u\"\nk = \"0\"\nKint = \"0\"\n\n[conserved]\nF = \"u\"\nG = \"-u_x + u\"\n",
    )
    .unwrap();
    let out = conslaw(&["sample", path.to_str().unwrap(), "-n", "200"]);
    assert_eq!(code(&out), 1, "{}{}", stdout(&out), stderr(&out));
    std::fs::remove_file(path).unwrap();
}

// ---------------------------------------------------------------------------
// simulate

#[test]
fn simulation_tracks_the_conserved_integral() {
    let heat = scratch("heat.toml");
    std::fs::write(
        &heat,
        "[model]\nd = \"1\"\nDint = \"u\"\nk = \"0\"\nKint = \"0\"\n\n[conserved]\nF = \"u\"\nG = \"-u_x\"\n",
    )
    .unwrap();
    let csv = scratch("heat.csv");
    let base: Vec<String> = [
        "simulate",
        heat.to_str().unwrap(),
        "--cells",
        "64",
        "--t-end",
        "0.05",
        "--boundary",
        "dirichlet",
        "--frames",
        "5",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let mut args: Vec<String> = base.clone();
    args.extend(["--csv".into(), csv.to_str().unwrap().to_string(), "--json".into()]);
    let out = conslaw(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let drift = v["max_relative_drift"].as_f64().unwrap();
    // mass leaks through the pinned ends: small but genuinely nonzero
    assert!(drift > 0.0 && drift < 1e-3, "drift {drift}");

    let series = std::fs::read_to_string(&csv).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next(), Some("t,integral,drift"));
    assert_eq!(lines.count(), 5, "one row per recorded frame");

    // the drift gates the exit code when a tolerance is given
    let mut strict = base.clone();
    strict.extend(["--tol".into(), format!("{:e}", drift / 2.0)]);
    let out = conslaw(&strict.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&out), 1, "{}{}", stdout(&out), stderr(&out));

    let mut loose = base;
    loose.extend(["--tol".into(), "1e-2".into()]);
    let out = conslaw(&loose.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));

    std::fs::remove_file(heat).unwrap();
    std::fs::remove_file(csv).unwrap();
}
