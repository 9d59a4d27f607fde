"""Smoke test for the stackga Python module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml --release`.
"""

import pathlib

import stackga

ROOT = pathlib.Path(__file__).resolve().parent.parent
HEART = ROOT / "data" / "heart.dat"

LIGHT_STACK = {
    "first_level": [
        {"family": "nb"},
        {"family": "knn"},
        {"family": "cart"},
        {"family": "lr", "hyperparameters": {"epochs": 300}},
    ],
    "meta_learner": {"family": "lr", "hyperparameters": {"epochs": 300}},
    "meta_mode": "oof:3",
}


def main():
    ds = stackga.load_dataset(str(HEART))
    assert (ds.m, ds.n) == (270, 13), ds
    assert "thal" in ds.feature_names

    report = stackga.evaluate(ds, "nb", split="k10", seed=1)
    assert 0.7 < report["accuracy"] <= 1.0, report
    print(f"nb 10-fold accuracy {100 * report['accuracy']:.2f}")

    model = stackga.fit(ds, {"family": "knn", "hyperparameters": {"k": 7}})
    assert model.predict(ds.row(0)) in (0, 1)
    assert 0.0 <= model.score(ds.row(0)) <= 1.0

    selected = stackga.fcbf(ds)
    print("fcbf keeps", [ds.feature_names[j] for j in selected["selected"]])
    top = stackga.relief(ds, top=5, seed=2)
    assert len(top["selected"]) == 5

    ga = stackga.evolve(ds, "nb", {"population_size": 8, "generations": 4, "fitness_folds": 3, "seed": 3})
    assert len(ga["best_mask"]) >= 1
    assert ga == stackga.evolve(ds, "nb", {"population_size": 8, "generations": 4, "fitness_folds": 3, "seed": 3})

    stack = stackga.fit_stacked(ds, LIGHT_STACK)
    assert len(stack.meta_row(ds.row(0))) == 4

    summary, selected_stack = stackga.stacked_ga(
        ds, LIGHT_STACK, {"population_size": 6, "generations": 3, "fitness_folds": 3, "seed": 4}
    )
    assert selected_stack.selected == summary["best_mask"]
    correct = sum(selected_stack.predict(ds.row(i)) == y for i, y in enumerate(ds.labels))
    print(f"stacked GA kept {len(summary['best_mask'])} features, training accuracy {100 * correct / ds.m:.2f}")

    try:
        stackga.evaluate(ds, "boost")
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("unknown family accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
