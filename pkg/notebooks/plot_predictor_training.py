"""
Training the landmark predictor on a toy task
=============================================

The predictor sees the model pose, the person pose and the garment
landmarks, and returns garment landmarks for the person. On the identity
task the right answer is to copy its garment input, which is a quick check
that the network and optimizer can fit anything at all.
"""

from garmentwarp import predictor, synthetic

data = synthetic.identity_task(64, seed=0)
print("inputs", data.inputs().shape, "targets", data.targets().shape)

log_every = 100


def log(epoch, loss):
    if epoch % log_every == 0:
        print(f"epoch {epoch:3d}  loss {loss:.5f}")


# Adam at lr 1e-3 occasionally kicks the loss back up for a few epochs
# before it settles again, so give it the full 500 epochs
result = predictor.train(data, predictor.TrainConfig(epochs=500, seed=0), log=log)
print(f"final loss {result.final_loss:.2e} in {result.seconds:.1f}s")

# Models round-trip through a small JSON file
blob = predictor.save_model(result.model)
assert predictor.load_model(blob) == result.model
print(f"model file {len(blob) / 1e6:.1f} MB")
