"""
`python -m uagc <subcomando> [flags]`: aceita os nomes com hífen
(`build-graph`, `gen-paths`, ...) e despacha para os comandos de gerenciamento.
"""

import os
import sys

from dotenv import load_dotenv

SUBCOMMANDS = {
    'build-graph': 'build_graph',
    'gen-paths': 'gen_paths',
    'build-activity': 'build_activity',
    'train': 'train',
    'eval': 'eval',
    'predict': 'predict',
    'simulate': 'simulate',
    'synth-data': 'synth_data',
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    # antes do numpy: fixa o número de threads do BLAS
    load_dotenv()
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'uagc.settings')

    if not argv or argv[0] in ('-h', '--help'):
        sys.stdout.write("uso: python -m uagc {" + ','.join(SUBCOMMANDS) + "} [flags]\n")
        return 0 if argv else 2
    command = SUBCOMMANDS.get(argv[0])
    if command is None:
        sys.stderr.write(f"E_USAGE: subcomando desconhecido {argv[0]!r}\n")
        return 2

    from django.core.management import execute_from_command_line

    execute_from_command_line(['uagc', command, *argv[1:]])
    return 0


if __name__ == '__main__':
    sys.exit(main())
