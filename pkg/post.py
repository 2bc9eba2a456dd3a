import requests

# Base URL of your FastAPI application
BASE_URL = "http://127.0.0.1:8000"

# Step 1: Run a small batch of trials on the mean-shift problem
payload = {
    "problem": {"problem": "mean_shift", "n": 300, "d": 5},
    "method": "rel_ume_opt",
    "J": 5,
    "alpha": 0.05,
    "trials": 10,
    "seed": 0,
}
response = requests.post(f"{BASE_URL}/trials/", json=payload)
if response.ok:
    run = response.json()
    print(f"Trials response: {response.status_code}, run {run['id']}: "
          f"rejection rate {run['rejection_rate']:.3f} [{run['ci_low']:.3f}, {run['ci_high']:.3f}]")
else:
    print(f"Trials run failed with status code: {response.status_code}, response text: {response.text}")
    raise SystemExit(1)

# Step 2: Fetch the stored trial records
response = requests.get(f"{BASE_URL}/runs/{run['id']}/records")
if response.ok:
    for record in response.json():
        print(f"  trial {record['trial_index']}: stat={record['stat']}, reject={record['reject']}")
else:
    print(f"Records retrieval failed with status code: {response.status_code}, response text: {response.text}")

# Step 3: List stored runs
response = requests.get(f"{BASE_URL}/runs/", params={"limit": 10})
if response.ok:
    for stored in response.json():
        print(f"Run {stored['id']}: {stored['problem']} {stored['method']} n={stored['n']} "
              f"rate={stored['rejection_rate']:.3f}")
else:
    print(f"Runs retrieval failed with status code: {response.status_code}, response text: {response.text}")
