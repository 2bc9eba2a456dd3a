import pytest
from fastapi.testclient import TestClient

from relgof.main import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def trials_body(**overrides):
    body = {
        "problem": {"problem": "mean_shift", "n": 40, "d": 2},
        "method": "rel_ume_random",
        "J": 2,
        "trials": 3,
        "seed": 1,
    }
    body.update(overrides)
    return body


def test_submit_and_retrieve_run(client):
    response = client.post("/trials/", json=trials_body())
    assert response.status_code == 200, response.text
    run = response.json()
    assert run["trials"] == 3 and run["method"] == "rel_ume_random"
    assert run["config"]["d"] == 2

    fetched = client.get(f"/runs/{run['id']}")
    assert fetched.status_code == 200
    assert fetched.json()["rejection_rate"] == run["rejection_rate"]

    records = client.get(f"/runs/{run['id']}/records").json()
    assert [r["trial_index"] for r in records] == [0, 1, 2]

    listed = client.get("/runs/", params={"limit": 1000}).json()
    assert run["id"] in [r["id"] for r in listed]


def test_unknown_run_is_404(client):
    assert client.get("/runs/999999").status_code == 404
    assert client.get("/runs/999999/records").status_code == 404


def test_list_limits_are_validated(client):
    assert client.get("/runs/", params={"limit": 0}).status_code == 422
    assert client.get("/runs/", params={"offset": -1}).status_code == 422


def test_invalid_trials_requests(client):
    bad_config = trials_body(problem={"problem": "rbm", "n": 40})
    assert client.post("/trials/", json=bad_config).status_code == 422
    missing_files = trials_body(problem={
        "problem": "external", "n": 40, "x_path": "nope-x.npy", "y_path": "nope-y.npy", "z_path": "nope-z.npy",
    })
    response = client.post("/trials/", json=missing_files)
    assert response.status_code == 400
    assert "not found" in response.json()["detail"]


def test_pool_scores(client):
    body = {
        "problem": {"problem": "mean_shift", "n": 60, "d": 2},
        "pool": [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]],
        "sigma2": 1.0,
    }
    response = client.post("/pool-scores/", json=body)
    assert response.status_code == 200, response.text
    scores = response.json()
    assert len(scores["scores"]) == 3
    assert scores["scores"][0] == scores["scores"][2]
    assert sorted(scores["descending"]) == [0, 1, 2]
    assert scores["sigma2"] == 1.0


def test_pool_scores_dimension_mismatch(client):
    body = {"problem": {"problem": "mean_shift", "n": 60, "d": 2}, "pool": [[0.0, 0.0, 0.0]]}
    assert client.post("/pool-scores/", json=body).status_code == 400
