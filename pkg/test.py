import pytest
import json
import os

ROOT = os.path.dirname(os.path.abspath(__file__))


def hseq(args):
    status = os.system('cd {} && PYTHONPATH=hseq python scripts/main.py {}'.format(ROOT, args))
    return os.waitstatus_to_exitcode(status)


def test_pipeline(tmp_path):
    out = str(tmp_path)
    with open(os.path.join(ROOT, 'configs', 'Example.minimal.json')) as f:
        run_config = json.load(f)
    # long enough at a constant rate for the coarse network to open every sentence with a real token
    run_config.update({'max_steps': 300, 'decay_start_step': 250, 'decay_interval': 25, 'n_iter_log': 50})
    with open(os.path.join(out, 'run.json'), 'w') as f:
        json.dump(run_config, f)

    data = '--src data/toy.en --tgt data/toy.zh'
    vocab = '--vocab-src {0}/vocab.en --vocab-tgt {0}/vocab.zh'.format(out)
    cfg = '--config {}/run.json'.format(out)
    assert hseq('build-vocab {} {} {}'.format(data, vocab, cfg)) == 0
    assert hseq('train-coarse {} {} {} --output {}/coarse.ckpt --metrics {}/coarse.tsv'.format(
        data, vocab, cfg, out, out)) == 0
    assert hseq('train-fine {} --coarse {}/coarse.ckpt {} --output {}/fine.ckpt'.format(data, out, cfg, out)) == 0
    assert hseq('translate --coarse {0}/coarse.ckpt --input data/toy.en --output {0}/hyp.zh {1}'.format(out, cfg)) == 0
    assert hseq('translate --coarse {0}/coarse.ckpt --fine {0}/fine.ckpt --input data/toy.en --output {0}/final.zh '
                '{1}'.format(out, cfg)) == 0
    assert hseq('evaluate --hyp {0}/hyp.zh --ref data/toy.zh --src data/toy.en --model {0}/coarse.ckpt '
                '--output {0}/report.txt {1}'.format(out, cfg)) == 0

    for name in ['vocab.en', 'vocab.zh', 'coarse.ckpt', 'coarse.ckpt.json', 'fine.ckpt', 'fine.ckpt.json',
                 'hyp.zh', 'final.zh', 'report.txt', 'report.txt.tsv']:
        assert os.path.isfile(os.path.join(out, name))
    with open(os.path.join(out, 'coarse.tsv')) as f:
        assert len(f.read().splitlines()) == 300
    with open(os.path.join(out, 'hyp.zh'), encoding='utf-8') as f:
        hypotheses = f.read().splitlines()
    assert len(hypotheses) == 20 and all(hypotheses)
    with open(os.path.join(out, 'final.zh'), encoding='utf-8') as f:
        assert len(f.read().splitlines()) == 20


if __name__ == '__main__':

    pytest.main(args=['-sv', os.path.abspath(__file__)])
