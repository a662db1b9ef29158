# %% [markdown]
# # Running experiments
#
# Small versions of the comparison tables; `felab table1` etc. run the
# full sizes and write reports to disk.

# %%
import tempfile

from felab.harness import RunConfig, emit_report, run_experiment

cfg = RunConfig(experiment="table1-nonstationary", trials=4, episodes=40)
rep = run_experiment(cfg)
for s in rep.summaries:
    print(f"{s.label:28s} {s.mean:6.2f}  [{s.ci_low:6.2f}, {s.ci_high:6.2f}]")

# %% Table 2 on two of its reward rows
rep2 = run_experiment(RunConfig(experiment="table2", trials=4, episodes=20, rows=[[0, -100, 0], [100, -100, 0]]))
for s in rep2.summaries:
    print(f"{s.agent:10s} {str(s.row):20s} {s.mean:6.2f} ({s.moves:.2f})")

# %% Files
with tempfile.TemporaryDirectory() as d:
    for p in emit_report(rep, d):
        print(p.name)
