try:
    from setuptools import setup
except ImportError:
    from distutils.core import setup


setup(
    name='sqgauss',
    version='0.1.0',
    description='Multivariate Gaussian regression of speech quality scores',
    packages=['sqgauss', 'sqgauss.tests'],
    install_requires=['numpy>=1.20',
                      'scipy>=1.4',
                      'pandas>=1.5',
                      'h5py>=2.5.0',
                      'boltons>=20.0'],
    extras_require={'test': ['pytest']},
    entry_points={'console_scripts': ['sqgauss = sqgauss.cli:main']},
)
