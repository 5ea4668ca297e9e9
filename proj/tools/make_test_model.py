#!/usr/bin/env python3
"""Writes a tiny ONNX scorer used by the model-adapter tests.

The network averages each input channel and maps the three means to ten
logits with a fixed linear layer, so brighter and more colourful inputs move
probability mass toward the upper buckets. Weights are deterministic.
"""

import argparse

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper


def build(bad_output: bool = False) -> onnx.ModelProto:
    outputs = 7 if bad_output else 10
    buckets = np.arange(outputs, dtype=np.float32) - (outputs - 1) / 2.0
    # Stored as (outputs, 3) with transB=1, the layout OpenCV's importer expects.
    weight = np.stack([0.6 * buckets, 0.9 * buckets, 0.3 * buckets], axis=1)
    bias = -0.05 * buckets**2

    nodes = [
        helper.make_node("GlobalAveragePool", ["image"], ["pooled"]),
        helper.make_node("Flatten", ["pooled"], ["features"], axis=1),
        helper.make_node("Gemm", ["features", "weight", "bias"], ["logits"], transB=1),
    ]
    graph = helper.make_graph(
        nodes,
        "tiny_aesthetic",
        [helper.make_tensor_value_info("image", TensorProto.FLOAT, [1, 3, 224, 224])],
        [helper.make_tensor_value_info("logits", TensorProto.FLOAT, [1, outputs])],
        initializer=[
            numpy_helper.from_array(weight.astype(np.float32), "weight"),
            numpy_helper.from_array(bias.astype(np.float32), "bias"),
        ],
    )
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", 11)])
    model.ir_version = 6
    onnx.checker.check_model(model)
    return model


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output")
    parser.add_argument("--bad-output", action="store_true", help="emit 7 logits instead of 10")
    args = parser.parse_args()
    onnx.save(build(args.bad_output), args.output)


if __name__ == "__main__":
    main()
