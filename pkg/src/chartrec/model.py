"""Encoder-decoder action-value network with a copying output head.

The encoder is a bidirectional GRU over the table's field vectors; its
outputs form the memory ``M`` (one entry per field). The decoder is a
single GRU cell whose input at each step is a linear projection of
``[selective-read | attention-context | token-embedding]``. Two heads read
the final decoder state: a generate head scoring the nine command tokens
and a copy head scoring each field through a bilinear product with a
nonlinear transform of ``M``.

Every per-action score is an independent two-logit softmax (computed as
the sigmoid of the logit difference), so outputs live in (0, 1) and are
not normalized across actions.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import autodiff as ad
from ._kernels import kernels
from .autodiff import Tensor
from .errors import DimensionMismatch, IllegalState, TooManyFields
from .features import (
    FeatureNorms,
    SemanticEmbedder,
    TableFeaturizer,
    SEG_GRP,
    SEG_OP,
    SEG_Y,
    token_segments,
)
from .grammar import (
    DEFAULT_CONSTRAINTS,
    N_COMMANDS,
    TOKEN_CLUSTER,
    TOKEN_STACK,
    ChartSequence,
    HardConstraints,
    Token,
    field_index,
    is_field_token,
    legal_actions,
    summarize,
)
from .tables import MAX_FIELDS, Table

MAGIC = b"T2C-MODEL-v1\n"


@dataclass(frozen=True)
class ModelConfig:
    preset: str
    enc_layers: int
    dec_layers: int
    enc_input: int
    dec_input: int
    enc_hidden: int
    dec_hidden: int
    d_sem: int = 50
    dtype: str = "float32"

    PRESETS = {
        "tiny": (1, 1, 64, 64, 32, 32),
        "small": (2, 1, 192, 192, 128, 128),
        "medium": (2, 1, 320, 256, 192, 192),
        "large": (4, 1, 384, 512, 224, 256),
    }

    @classmethod
    def preset_config(cls, name: str, d_sem: int = 50, dtype: str = "float32") -> "ModelConfig":
        if name not in cls.PRESETS:
            raise KeyError(f"unknown model size preset {name!r}")
        return cls(name, *cls.PRESETS[name], d_sem=d_sem, dtype=dtype)

    @property
    def enc_out(self) -> int:
        return 2 * self.enc_hidden

    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32


def _param_shapes(cfg: ModelConfig, raw_width: int) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {
        "embed.W": (raw_width, cfg.enc_input),
        "embed.b": (cfg.enc_input,),
    }
    h = cfg.enc_hidden
    for layer in range(cfg.enc_layers):
        in_dim = cfg.enc_input if layer == 0 else cfg.enc_out
        for direction in ("fwd", "bwd"):
            prefix = f"enc.l{layer}.{direction}"
            shapes[f"{prefix}.W_ih"] = (in_dim, 3 * h)
            shapes[f"{prefix}.W_hh"] = (h, 3 * h)
            shapes[f"{prefix}.b_ih"] = (3 * h,)
            shapes[f"{prefix}.b_hh"] = (3 * h,)
    hd = cfg.dec_hidden
    shapes.update(
        {
            "dec.in.W": (2 * cfg.enc_out + cfg.enc_input, cfg.dec_input),
            "dec.in.b": (cfg.dec_input,),
            "dec.cell.W_ih": (cfg.dec_input, 3 * hd),
            "dec.cell.W_hh": (hd, 3 * hd),
            "dec.cell.b_ih": (3 * hd,),
            "dec.cell.b_hh": (3 * hd,),
            "att.W": (hd, cfg.enc_out),
            "copy.W": (cfg.enc_out, hd),
            "copy.b": (hd,),
            "copy.b0": (1,),
            "gen.W": (hd, 2 * N_COMMANDS),
            "gen.b": (2 * N_COMMANDS,),
            "z0.W": (cfg.enc_out, hd),
            "z0.b": (hd,),
        }
    )
    return shapes


def _fan_in(name: str, shape: tuple[int, ...], shapes) -> int:
    if len(shape) > 1:
        return shape[0]
    # biases reuse their matrix's fan-in
    base, leaf = name.rsplit(".", 1)
    cands = [f"{base}.W_hh"] if leaf == "b_hh" else []
    cands += [f"{base}.W_ih", f"{base}.W"]
    for cand in cands:
        if cand in shapes:
            return shapes[cand][0]
    return max(shape[0], 1)


def is_encoder_param(name: str) -> bool:
    """Encoder part = token-embedding projection + recurrent table encoder."""
    return name.startswith("embed.") or name.startswith("enc.")


class DqnModel:
    """Action-value network Q(state, actions) for one table.

    Owns its parameters, the feature pipeline (embedder + norms) and the
    configuration. Inference entry points (:meth:`encode`,
    :meth:`decode_step`, :meth:`q_values`) run on plain numpy arrays;
    :meth:`forward_batch` records gradients for training.
    """

    def __init__(self, config: ModelConfig, featurizer: TableFeaturizer, seed: int = 0):
        self.config = config
        self.featurizer = featurizer
        self.seed = seed
        self._dtype = config.np_dtype()
        shapes = _param_shapes(config, featurizer.width)
        rng = np.random.default_rng(seed)
        self.params: dict[str, Tensor] = {}
        for name in sorted(shapes):
            shape = shapes[name]
            bound = 1.0 / np.sqrt(_fan_in(name, shape, shapes))
            data = rng.uniform(-bound, bound, size=shape).astype(self._dtype)
            self.params[name] = Tensor(data)

    # -- bookkeeping ------------------------------------------------------

    def parameter_count(self, part: str | None = None) -> int:
        total = 0
        for name, p in self.params.items():
            if part == "encoder" and not is_encoder_param(name):
                continue
            if part == "decoder" and is_encoder_param(name):
                continue
            total += p.data.size
        return total

    def param_arrays(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def load_param_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for k, v in arrays.items():
            if k not in self.params or self.params[k].data.shape != v.shape:
                raise DimensionMismatch(f"parameter {k} has wrong shape")
            self.params[k].data = v.astype(self._dtype)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def share_encoder_from(self, other: "DqnModel") -> None:
        """Alias the encoder-part tensors of ``other`` (for transfer runs)."""
        for name in list(self.params):
            if is_encoder_param(name):
                self.params[name] = other.params[name]

    # -- inference path (numpy) -------------------------------------------

    def _p(self, name: str) -> np.ndarray:
        return self.params[name].data

    def encode(self, table: Table) -> np.ndarray:
        """Memory M: one context vector per field, [n_fields, 2*enc_hidden]."""
        if table.n_fields > MAX_FIELDS:
            raise TooManyFields(f"{table.n_fields} fields exceeds {MAX_FIELDS}")
        x = self.featurizer.encoder_matrix(table).astype(self._dtype)
        seq = x @ self._p("embed.W") + self._p("embed.b")
        h_dim = self.config.enc_hidden
        for layer in range(self.config.enc_layers):
            outputs = []
            for direction in ("fwd", "bwd"):
                prefix = f"enc.l{layer}.{direction}"
                gi_all = seq @ self._p(f"{prefix}.W_ih") + self._p(f"{prefix}.b_ih")
                w_hh = self._p(f"{prefix}.W_hh")
                b_hh = self._p(f"{prefix}.b_hh")
                h = np.zeros((1, h_dim), dtype=self._dtype)
                steps = range(seq.shape[0]) if direction == "fwd" else range(seq.shape[0] - 1, -1, -1)
                out = np.empty((seq.shape[0], h_dim), dtype=self._dtype)
                for t in steps:
                    gh = h @ w_hh + b_hh
                    h, _, _, _ = kernels.gru_cell_fwd(gi_all[t : t + 1], gh, h)
                    out[t] = h[0]
                outputs.append(out)
            seq = np.concatenate(outputs, axis=1)
        return seq

    def copy_transform(self, memory: np.ndarray) -> np.ndarray:
        return np.tanh(memory @ self._p("copy.W") + self._p("copy.b"))

    def initial_state(self, memory: np.ndarray) -> np.ndarray:
        mean = memory.mean(axis=0, keepdims=True)
        return np.tanh(mean @ self._p("z0.W") + self._p("z0.b"))

    def _default_segment(self, token: Token) -> int:
        if is_field_token(token):
            return SEG_Y
        if token in (TOKEN_CLUSTER, TOKEN_STACK):
            return SEG_GRP
        return SEG_OP

    def selective_read(self, memory: np.ndarray, prev_token: Token) -> np.ndarray:
        """The memory entry of a field token; a zero vector otherwise."""
        if is_field_token(prev_token):
            return memory[field_index(prev_token) : field_index(prev_token) + 1]
        return np.zeros((1, self.config.enc_out), dtype=self._dtype)

    def attention_weights(self, memory: np.ndarray, z_prev: np.ndarray) -> np.ndarray:
        """Softmax over the bilinear scores between z and each memory entry."""
        scores = memory @ (z_prev @ self._p("att.W"))[0]
        scores -= scores.max()
        weights = np.exp(scores)
        return weights / weights.sum()

    def decode_step(
        self,
        memory: np.ndarray,
        z_prev: np.ndarray,
        prev_token: Token,
        table: Table,
        segment: int | None = None,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """One decoder update.

        Returns ``(z, command_scores[9], copy_scores[n_fields])``; scores are
        per-action probabilities in (0, 1).
        """
        if memory.shape[0] != table.n_fields or memory.shape[1] != self.config.enc_out:
            raise DimensionMismatch(
                f"memory shape {memory.shape} does not match table/config"
            )
        if segment is None:
            segment = self._default_segment(prev_token)
        zeta = self.selective_read(memory, prev_token)
        weights = self.attention_weights(memory, z_prev)
        context = weights @ memory  # [enc_out]
        token_raw = self.featurizer.token_vector(table, prev_token, segment).astype(self._dtype)
        embedded = token_raw @ self._p("embed.W") + self._p("embed.b")
        p_in = np.concatenate([zeta[0], context, embedded])[None, :]
        p = p_in @ self._p("dec.in.W") + self._p("dec.in.b")
        gh = z_prev @ self._p("dec.cell.W_hh") + self._p("dec.cell.b_hh")
        gi = p @ self._p("dec.cell.W_ih") + self._p("dec.cell.b_ih")
        z, _, _, _ = kernels.gru_cell_fwd(gi, gh, z_prev)

        gen_logits = z @ self._p("gen.W") + self._p("gen.b")
        diff = gen_logits[0, :N_COMMANDS] - gen_logits[0, N_COMMANDS:]
        gen_scores = 1.0 / (1.0 + np.exp(-diff))
        phi = self.copy_transform(memory)  # [n, dec_hidden]
        copy_logits = phi @ z[0] - self._p("copy.b0")[0]
        copy_scores = 1.0 / (1.0 + np.exp(-copy_logits))
        return z, gen_scores, copy_scores

    def q_values(
        self,
        table: Table,
        state: ChartSequence,
        constraints: HardConstraints = DEFAULT_CONSTRAINTS,
        memory: np.ndarray | None = None,
        z_prev: np.ndarray | None = None,
    ) -> dict[Token, float]:
        """Scores over exactly the legal actions of ``state``.

        ``memory``/``z_prev`` allow callers that walk sequences token by
        token (the beam search) to skip recomputation; ``z_prev`` must then
        be the decoder state after ``state[:-1]``.
        """
        summarize(table, state, constraints)  # raises IllegalState / UnknownField
        if not state:
            raise IllegalState("q_values needs at least the chart-type token")
        if memory is None:
            memory = self.encode(table)
        segments = token_segments(state)
        if z_prev is None:
            z = self.initial_state(memory)
            for tok, seg in zip(state[:-1], segments[:-1]):
                z, _, _ = self.decode_step(memory, z, tok, table, seg)
        else:
            z = z_prev
        z, gen_scores, copy_scores = self.decode_step(
            memory, z, state[-1], table, segments[-1]
        )
        legal = legal_actions(table, state, constraints)
        out: dict[Token, float] = {}
        for a in legal:
            if is_field_token(a):
                out[a] = float(copy_scores[field_index(a)])
            else:
                out[a] = float(gen_scores[a])
        return out

    # -- training path (autodiff) -----------------------------------------

    def forward_batch(self, batch: "EncodedBatch") -> Tensor:
        """Scores [B, 9 + Nmax] with gradient recording."""
        pt = self.params
        enc_x = Tensor(batch.enc_x)
        e = ad.add(ad.matmul(enc_x, pt["embed.W"]), pt["embed.b"])
        b_size, n_max, _ = batch.enc_x.shape
        h_dim = self.config.enc_hidden
        seq = e
        enc_mask = batch.enc_mask  # [B, N] plain numpy
        for layer in range(self.config.enc_layers):
            outs = []
            for direction in ("fwd", "bwd"):
                prefix = f"enc.l{layer}.{direction}"
                gi_all = ad.add(ad.matmul(seq, pt[f"{prefix}.W_ih"]), pt[f"{prefix}.b_ih"])
                h = Tensor(np.zeros((b_size, h_dim), dtype=self._dtype))
                steps = range(n_max) if direction == "fwd" else range(n_max - 1, -1, -1)
                collected: dict[int, Tensor] = {}
                for t in steps:
                    gi = ad.index_axis1(gi_all, t)
                    gh = ad.add(ad.matmul(h, pt[f"{prefix}.W_hh"]), pt[f"{prefix}.b_hh"])
                    h_new = _gru_op(gi, gh, h)
                    m = enc_mask[:, t : t + 1].astype(self._dtype)
                    h = ad.add(ad.mul(h_new, m), ad.mul(h, 1.0 - m))
                    collected[t] = h
                outs.append(ad.stack_axis1([collected[t] for t in range(n_max)]))
            seq = ad.concat(outs, axis=-1)
        memory = seq  # [B, N, 2H]

        mask3 = enc_mask[:, :, None].astype(self._dtype)
        counts = enc_mask.sum(axis=1, keepdims=True).astype(self._dtype)
        mean_m = ad.mul(ad.tsum(ad.mul(memory, mask3), axis=1), 1.0 / counts)
        z = ad.tanh(ad.add(ad.matmul(mean_m, pt["z0.W"]), pt["z0.b"]))

        dec_e = ad.add(ad.matmul(Tensor(batch.dec_x), pt["embed.W"]), pt["embed.b"])
        attn_bias = (enc_mask - 1.0) * 1e9  # [B, N]
        l_max = batch.dec_x.shape[1]
        for t in range(l_max):
            x_t = ad.index_axis1(dec_e, t)
            sel_t = batch.dec_sel[:, t, :][:, None, :]  # [B,1,N] constant
            zeta = ad.reshape(ad.matmul(Tensor(sel_t), memory), (b_size, -1))
            att = ad.matmul(z, pt["att.W"])  # [B, 2H]
            scores = ad.reshape(
                ad.matmul(memory, ad.reshape(att, (b_size, -1, 1))), (b_size, n_max)
            )
            alpha = ad.softmax(ad.add(scores, attn_bias), axis=-1)
            ctx = ad.reshape(
                ad.matmul(ad.reshape(alpha, (b_size, 1, n_max)), memory), (b_size, -1)
            )
            p_in = ad.concat([zeta, ctx, x_t], axis=-1)
            p = ad.add(ad.matmul(p_in, pt["dec.in.W"]), pt["dec.in.b"])
            gi = ad.add(ad.matmul(p, pt["dec.cell.W_ih"]), pt["dec.cell.b_ih"])
            gh = ad.add(ad.matmul(z, pt["dec.cell.W_hh"]), pt["dec.cell.b_hh"])
            z_new = _gru_op(gi, gh, z)
            m = batch.dec_mask[:, t : t + 1].astype(self._dtype)
            z = ad.add(ad.mul(z_new, m), ad.mul(z, 1.0 - m))

        gen_logits = ad.add(ad.matmul(z, pt["gen.W"]), pt["gen.b"])
        l1 = ad.narrow(gen_logits, 1, 0, N_COMMANDS)
        l0 = ad.narrow(gen_logits, 1, N_COMMANDS, N_COMMANDS)
        gen_scores = ad.sigmoid(ad.sub(l1, l0))

        phi = ad.tanh(ad.add(ad.matmul(memory, pt["copy.W"]), pt["copy.b"]))
        copy_logits = ad.reshape(
            ad.matmul(phi, ad.reshape(z, (b_size, -1, 1))), (b_size, n_max)
        )
        copy_scores = ad.sigmoid(ad.sub(copy_logits, pt["copy.b0"]))
        return ad.concat([gen_scores, copy_scores], axis=-1)

    # -- persistence -------------------------------------------------------

    def save(self, path: str) -> None:
        tensors = []
        blobs = []
        offset = 0
        items = sorted(self.params.items())
        embedder = self.featurizer.embedder
        if embedder.kind == "pretrained-file":
            vocab = sorted(embedder.vectors)
            matrix = np.stack([embedder.vectors[w] for w in vocab])
            items = items + [("embedder.vectors", Tensor(matrix))]
        else:
            vocab = None
        for name, tensor in items:
            arr = np.ascontiguousarray(tensor.data)
            tensors.append(
                {
                    "name": name,
                    "dtype": str(arr.dtype),
                    "shape": list(arr.shape),
                    "offset": offset,
                    "nbytes": arr.nbytes,
                }
            )
            blobs.append(arr.tobytes())
            offset += arr.nbytes
        header = {
            "config": {
                "preset": self.config.preset,
                "enc_layers": self.config.enc_layers,
                "dec_layers": self.config.dec_layers,
                "enc_input": self.config.enc_input,
                "dec_input": self.config.dec_input,
                "enc_hidden": self.config.enc_hidden,
                "dec_hidden": self.config.dec_hidden,
                "d_sem": self.config.d_sem,
                "dtype": self.config.dtype,
            },
            "seed": self.seed,
            "norms": self.featurizer.norms.percentiles.tolist(),
            "embedder": embedder.spec() | ({"vocab": vocab} if vocab else {}),
            "tensors": tensors,
        }
        head = json.dumps(header).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<Q", len(head)))
            fh.write(head)
            for blob in blobs:
                fh.write(blob)

    @classmethod
    def load(cls, path: str) -> "DqnModel":
        with open(path, "rb") as fh:
            magic = fh.read(len(MAGIC))
            if magic != MAGIC:
                raise IllegalState(f"{path!r} is not a model file (bad magic)")
            (head_len,) = struct.unpack("<Q", fh.read(8))
            header = json.loads(fh.read(head_len).decode("utf-8"))
            payload = fh.read()
        cfg = ModelConfig(**header["config"])
        tensors: dict[str, np.ndarray] = {}
        for meta in header["tensors"]:
            start = meta["offset"]
            arr = np.frombuffer(
                payload, dtype=np.dtype(meta["dtype"]), count=int(np.prod(meta["shape"]) or 1),
                offset=start,
            ).reshape(meta["shape"]).copy()
            tensors[meta["name"]] = arr
        emb_spec = header["embedder"]
        if emb_spec["kind"] == "pretrained-file":
            vocab = emb_spec["vocab"]
            matrix = tensors.pop("embedder.vectors")
            embedder = SemanticEmbedder(
                dim=emb_spec["dim"],
                kind="pretrained-file",
                vectors={w: matrix[i] for i, w in enumerate(vocab)},
            )
        else:
            embedder = SemanticEmbedder(dim=emb_spec["dim"], kind=emb_spec["kind"])
        norms = FeatureNorms(np.array(header["norms"], dtype=np.float64))
        featurizer = TableFeaturizer(embedder, norms)
        model = cls(cfg, featurizer, seed=header.get("seed", 0))
        model.load_param_arrays(tensors)
        return model


def _gru_op(gi: Tensor, gh: Tensor, h: Tensor) -> Tensor:
    """Fused GRU cell as a custom autodiff op (kernel-backed)."""
    h_new, r, u, n = kernels.gru_cell_fwd(gi.data, gh.data, h.data)
    hidden = h.data.shape[1]
    gh_n = gh.data[:, 2 * hidden :]
    h_data = h.data

    def bwd(g):
        return kernels.gru_cell_bwd(np.ascontiguousarray(g), r, u, n, h_data, gh_n)

    return ad.custom_op((gi, gh, h), h_new, bwd)


@dataclass
class EncodedBatch:
    """Padded numpy views of a minibatch, ready for :meth:`forward_batch`."""

    enc_x: np.ndarray  # [B, Nmax, W]
    enc_mask: np.ndarray  # [B, Nmax] 1.0/0.0
    dec_x: np.ndarray  # [B, Lmax, W]
    dec_sel: np.ndarray  # [B, Lmax, Nmax] one-hot selective-read pick
    dec_mask: np.ndarray  # [B, Lmax]
    labels: np.ndarray = dc_field(default=None)  # [B, 9 + Nmax]
    legal: np.ndarray = dc_field(default=None)  # [B, 9 + Nmax] 1.0/0.0


def build_model(
    preset: str = "tiny",
    tables=None,
    embedder: SemanticEmbedder | None = None,
    norms: FeatureNorms | None = None,
    seed: int = 0,
    d_sem: int = 50,
    dtype: str = "float32",
) -> DqnModel:
    """Assemble a model, fitting feature norms from ``tables`` if given."""
    from .features import fit_feature_norms

    embedder = embedder or SemanticEmbedder(dim=d_sem)
    if norms is None:
        norms = fit_feature_norms(tables) if tables else FeatureNorms.identity()
    cfg = ModelConfig.preset_config(preset, d_sem=embedder.dim, dtype=dtype)
    return DqnModel(cfg, TableFeaturizer(embedder, norms), seed=seed)
