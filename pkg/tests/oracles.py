"""Independent brute-force oracles used only by the tests.

Nothing here imports the library under test: confusion counting, metric
formulas, softmax, and the unigram logistic baseline are all written from
scratch so they can disagree with the implementation if it is wrong.
"""

import numpy as np


def recount_confusion(pairs):
    """Direct counting over (predicted, true) pairs; positive class is 1."""
    tp = fp = fn = tn = 0
    for pred, label in pairs:
        if pred == 1 and label == 1:
            tp += 1
        elif pred == 1 and label == 0:
            fp += 1
        elif pred == 0 and label == 1:
            fn += 1
        else:
            tn += 1
    return {"tp": tp, "fp": fp, "fn": fn, "tn": tn}


def prf_by_hand(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return precision, recall, f1


def accuracy_by_hand(counts):
    total = counts["tp"] + counts["fp"] + counts["fn"] + counts["tn"]
    return (counts["tp"] + counts["tn"]) / total


def softmax_direct(z):
    e = np.exp(np.asarray(z, dtype=np.float64))
    return e / e.sum()


def unigram_logistic_baseline(train_docs, test_docs, steps=800, lr=0.5,
                              l2=1e-4):
    """Bag-of-tokens logistic regression trained to convergence by
    full-batch gradient descent; returns test accuracy.

    Features are binary indicators over every text and emoji token seen in
    training; unseen test tokens contribute nothing.  Deterministic.
    """
    vocab = {}
    for doc in train_docs:
        for tok in list(doc.text_tokens) + list(doc.emoji_tokens):
            if tok not in vocab:
                vocab[tok] = len(vocab)

    def featurize(docs):
        x = np.zeros((len(docs), len(vocab) + 1))
        x[:, -1] = 1.0  # bias
        for row, doc in enumerate(docs):
            for tok in list(doc.text_tokens) + list(doc.emoji_tokens):
                col = vocab.get(tok)
                if col is not None:
                    x[row, col] = 1.0
        return x

    x_train = featurize(train_docs)
    y_train = np.array([doc.label for doc in train_docs], dtype=np.float64)
    w = np.zeros(x_train.shape[1])
    n = len(train_docs)
    for _ in range(steps):
        p = 1.0 / (1.0 + np.exp(-(x_train @ w)))
        grad = x_train.T @ (p - y_train) / n + l2 * w
        w -= lr * grad

    x_test = featurize(test_docs)
    preds = (x_test @ w > 0).astype(int)
    labels = np.array([doc.label for doc in test_docs])
    return float((preds == labels).mean())
