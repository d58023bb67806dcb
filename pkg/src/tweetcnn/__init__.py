"""tweetcnn: three-phase CNN training for short-text sentiment classification.

Library layout:

- ``textprep``: tweet normalization, tokenization, emoticon weak labeling
- ``vocab``: vocabulary construction and fixed-length encoding
- ``embed``: skip-gram embeddings (compiled kernel + Python fallback), PCA
- ``nncore``: convolution / pooling / relu / softmax kernels with gradients
- ``network``: L1/L2/L3 architectures, forward, backprop, serialization
- ``optim``: AdaDelta
- ``pipeline``: the three-phase procedure and corpus mixing
- ``metrics``: confusion matrix and the averaged pos/neg F1
- ``cli``: the ``tweetcnn`` command-line front-end
"""

__version__ = "0.1.0"
